# Reflectionless Package