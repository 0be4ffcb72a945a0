import keras
import tensorflow as tf

model = keras.models.Sequential()
print(tf.__version__)
